#pragma once

#include "calderon/core.hpp"
#include "calderon/geometry.hpp"
#include "calderon/validation.hpp"
#include "calderon/mesh.hpp"
#include "calderon/quadrature.hpp"
#include "calderon/coefficient.hpp"
#include "calderon/a2.hpp"
#include "calderon/fem.hpp"
#include "calderon/nd_map.hpp"
#include "calderon/scan.hpp"
#include "calderon/monotonicity.hpp"
#include "calderon/reconstruction.hpp"
#include "calderon/oracle.hpp"
#include "calderon/config.hpp"
