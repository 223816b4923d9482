#pragma once

#include "gmt/calibration.hpp"

namespace gmt {
namespace fixtures = calibration;
}
