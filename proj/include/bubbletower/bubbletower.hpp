#pragma once

#include "ansatz.hpp"
#include "bubble.hpp"
#include "errors.hpp"
#include "gamma.hpp"
#include "linear.hpp"
#include "parameters.hpp"
#include "radial_field.hpp"
#include "rational.hpp"
#include "refine.hpp"
#include "residual.hpp"
#include "tower_spec.hpp"
#include "version.hpp"
#include "report.hpp"
