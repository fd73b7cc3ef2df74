#pragma once

#include "tnc/block_models.hpp"
#include "tnc/cpd.hpp"
#include "tnc/cur.hpp"
#include "tnc/error.hpp"
#include "tnc/io.hpp"
#include "tnc/linalg.hpp"
#include "tnc/multilinear.hpp"
#include "tnc/quantize.hpp"
#include "tnc/random.hpp"
#include "tnc/tensor.hpp"
#include "tnc/tt.hpp"
#include "tnc/tt_sweeps.hpp"
#include "tnc/tucker.hpp"
