#pragma once

#include "xbma/error.hpp"
#include "xbma/geno.hpp"
#include "xbma/linear.hpp"
#include "xbma/logistic.hpp"
#include "xbma/mixture.hpp"
#include "xbma/numerics.hpp"
#include "xbma/parallel.hpp"
#include "xbma/polya_gamma.hpp"
#include "xbma/rng.hpp"
#include "xbma/scan.hpp"
#include "xbma/simulate.hpp"
#include "xbma/zmax.hpp"
