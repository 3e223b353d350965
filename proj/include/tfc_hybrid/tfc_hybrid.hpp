#pragma once

#include "tfc_hybrid/errors.hpp"
#include "tfc_hybrid/basis.hpp"
#include "tfc_hybrid/switching.hpp"
#include "tfc_hybrid/layout.hpp"
#include "tfc_hybrid/expressions.hpp"
#include "tfc_hybrid/assembly.hpp"
#include "tfc_hybrid/problems.hpp"
#include "tfc_hybrid/solver.hpp"
