#pragma once

#include "qcels/dataset_io.hpp"
#include "qcels/error.hpp"
#include "qcels/experiment.hpp"
#include "qcels/filter.hpp"
#include "qcels/fit.hpp"
#include "qcels/hamiltonians.hpp"
#include "qcels/model_io.hpp"
#include "qcels/multilevel.hpp"
#include "qcels/qpe.hpp"
#include "qcels/rng.hpp"
#include "qcels/sampler.hpp"
#include "qcels/spectrum.hpp"
