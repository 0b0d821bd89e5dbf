#pragma once

#include "harperdim/cantor/bounds.hpp"
#include "harperdim/cantor/constants.hpp"
#include "harperdim/cantor/measure.hpp"
#include "harperdim/cantor/tree.hpp"
#include "harperdim/cantor/validate.hpp"
