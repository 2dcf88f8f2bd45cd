#pragma once

#include "cltlab/alpha.hpp"
#include "cltlab/bounds.hpp"
#include "cltlab/charfn.hpp"
#include "cltlab/comparison.hpp"
#include "cltlab/dioph.hpp"
#include "cltlab/distribution.hpp"
#include "cltlab/edgeworth.hpp"
#include "cltlab/errors.hpp"
#include "cltlab/numeric.hpp"
#include "cltlab/quadrature.hpp"
#include "cltlab/rates.hpp"
#include "cltlab/version.hpp"
