#pragma once

#include "mare/adda_oracle.hpp"
#include "mare/benchgen.hpp"
#include "mare/criteria.hpp"
#include "mare/dadda.hpp"
#include "mare/error.hpp"
#include "mare/gth.hpp"
#include "mare/io.hpp"
#include "mare/matrix.hpp"
#include "mare/problem.hpp"
#include "mare/rng.hpp"
#include "mare/structured.hpp"
