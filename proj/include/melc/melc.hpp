#pragma once

#include "melc/classifier.hpp"
#include "melc/dataset.hpp"
#include "melc/density.hpp"
#include "melc/error.hpp"
#include "melc/eval.hpp"
#include "melc/gradient.hpp"
#include "melc/model_io.hpp"
#include "melc/numeric.hpp"
#include "melc/optimizer.hpp"
#include "melc/parallel.hpp"
#include "melc/random.hpp"
