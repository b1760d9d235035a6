#pragma once

#include "sktshadow/basis.hpp"
#include "sktshadow/config.hpp"
#include "sktshadow/domain.hpp"
#include "sktshadow/errors.hpp"
#include "sktshadow/evolution.hpp"
#include "sktshadow/field.hpp"
#include "sktshadow/io.hpp"
#include "sktshadow/model.hpp"
#include "sktshadow/params.hpp"
#include "sktshadow/pipeline.hpp"
#include "sktshadow/plots.hpp"
#include "sktshadow/reduction.hpp"
#include "sktshadow/solver.hpp"
#include "sktshadow/spectra.hpp"
#include "sktshadow/verify.hpp"
