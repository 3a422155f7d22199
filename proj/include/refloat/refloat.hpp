#pragma once

#include "refloat/bitserial.hpp"
#include "refloat/blocked.hpp"
#include "refloat/container.hpp"
#include "refloat/coo.hpp"
#include "refloat/cost.hpp"
#include "refloat/format.hpp"
#include "refloat/matrix_market.hpp"
#include "refloat/solvers.hpp"
#include "refloat/spmv.hpp"
