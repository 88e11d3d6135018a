#pragma once

#include "types.hpp"
#include "halfplane.hpp"
#include "poly_core.hpp"
#include "regions.hpp"
#include "stability.hpp"
#include "slices.hpp"
#include "compress.hpp"
#include "symmetric.hpp"
#include "degree_principles.hpp"
