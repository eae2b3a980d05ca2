#pragma once

#include "punctured/error.hpp"
#include "punctured/fock.hpp"
#include "punctured/phasespace.hpp"
#include "punctured/photonstats.hpp"
#include "punctured/positivity.hpp"
#include "punctured/qnd.hpp"
#include "punctured/quadrature.hpp"
#include "punctured/serialize.hpp"
#include "punctured/state.hpp"
