#pragma once

#include "pads/baselines.hpp"
#include "pads/config.hpp"
#include "pads/errors.hpp"
#include "pads/evaluation.hpp"
#include "pads/files.hpp"
#include "pads/fusion.hpp"
#include "pads/geo_frames.hpp"
#include "pads/gp_uncertainty.hpp"
#include "pads/loda.hpp"
#include "pads/log.hpp"
#include "pads/metrics.hpp"
#include "pads/motion_regression.hpp"
#include "pads/parallel.hpp"
#include "pads/pipeline.hpp"
#include "pads/qp.hpp"
#include "pads/simulator.hpp"
#include "pads/trace_io.hpp"
#include "pads/trace_model.hpp"
