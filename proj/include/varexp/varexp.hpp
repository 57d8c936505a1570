#pragma once

// Umbrella header for the varexp library.

#include "varexp/error.hpp"
#include "varexp/expr.hpp"
#include "varexp/grid.hpp"
#include "varexp/vxspace.hpp"
#include "varexp/opkernel.hpp"
#include "varexp/picone.hpp"
#include "varexp/elliptic.hpp"
#include "varexp/fde.hpp"
#include "varexp/sampling.hpp"
#include "varexp/version.hpp"
