#pragma once

#include "susyq/errors.hpp"
#include "susyq/geometry.hpp"
#include "susyq/spectral_basis.hpp"
#include "susyq/quadrature.hpp"
#include "susyq/spectrum.hpp"
#include "susyq/overlap.hpp"
#include "susyq/determinant.hpp"
#include "susyq/thermal.hpp"
#include "susyq/dynamics.hpp"
#include "susyq/talbot.hpp"
#include "susyq/quench.hpp"
#include "susyq/work.hpp"
#include "susyq/config.hpp"
#include "susyq/runner.hpp"
