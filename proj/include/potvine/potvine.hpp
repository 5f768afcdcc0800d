#ifndef POTVINE_POTVINE_HPP
#define POTVINE_POTVINE_HPP

#include "potvine/counterfactual.hpp"
#include "potvine/diagnostics.hpp"
#include "potvine/errors.hpp"
#include "potvine/gpd.hpp"
#include "potvine/margins.hpp"
#include "potvine/numeric.hpp"
#include "potvine/optimize.hpp"
#include "potvine/paircopula.hpp"
#include "potvine/rng.hpp"
#include "potvine/vine.hpp"

#endif  // POTVINE_POTVINE_HPP
