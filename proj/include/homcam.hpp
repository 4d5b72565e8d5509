#pragma once

#include "homcam/analysis.hpp"
#include "homcam/camera.hpp"
#include "homcam/coincidence.hpp"
#include "homcam/event_io.hpp"
#include "homcam/events.hpp"
#include "homcam/fit.hpp"
#include "homcam/interferometer.hpp"
#include "homcam/pairs_io.hpp"
#include "homcam/physics.hpp"
#include "homcam/report.hpp"
#include "homcam/run_config.hpp"
