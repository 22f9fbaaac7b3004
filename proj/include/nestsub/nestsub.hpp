#pragma once

// Umbrella header for the nestsub library: subtyping of nested,
// polymorphic, equirecursive session types with variance inference,
// programmer-supplied subtyping seeds, and two bounded oracles.

#include "nestsub/variance.hpp"
#include "nestsub/type.hpp"
#include "nestsub/subst.hpp"
#include "nestsub/signature.hpp"
#include "nestsub/parser.hpp"
#include "nestsub/validity.hpp"
#include "nestsub/rename.hpp"
#include "nestsub/subtype.hpp"
#include "nestsub/simoracle.hpp"
#include "nestsub/bpa.hpp"
