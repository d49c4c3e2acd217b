#pragma once

#include "phovo/camera.hpp"
#include "phovo/dataset.hpp"
#include "phovo/evaluation.hpp"
#include "phovo/homography.hpp"
#include "phovo/image.hpp"
#include "phovo/observability.hpp"
#include "phovo/photometry.hpp"
#include "phovo/response_calibration.hpp"
#include "phovo/rng.hpp"
#include "phovo/sim3.hpp"
#include "phovo/synthetic.hpp"
#include "phovo/vignette_calibration.hpp"
