#pragma once

#include "waterx/assess.hpp"
#include "waterx/baselines.hpp"
#include "waterx/error.hpp"
#include "waterx/histogram.hpp"
#include "waterx/numeric.hpp"
#include "waterx/otsu.hpp"
#include "waterx/pipeline.hpp"
#include "waterx/postprocess.hpp"
#include "waterx/raster.hpp"
#include "waterx/report.hpp"
#include "waterx/synth.hpp"
#include "waterx/text.hpp"
