#pragma once

#include "incent/audit.hpp"
#include "incent/decision.hpp"
#include "incent/errors.hpp"
#include "incent/experiment.hpp"
#include "incent/format.hpp"
#include "incent/io.hpp"
#include "incent/learning.hpp"
#include "incent/loss.hpp"
#include "incent/mixture.hpp"
#include "incent/simplex.hpp"
#include "incent/train.hpp"
