#pragma once

#include "seaice/chart_io.hpp"
#include "seaice/config.hpp"
#include "seaice/errors.hpp"
#include "seaice/evaluator.hpp"
#include "seaice/geotiff.hpp"
#include "seaice/ice_labels.hpp"
#include "seaice/image_io.hpp"
#include "seaice/inference.hpp"
#include "seaice/ingest.hpp"
#include "seaice/losses.hpp"
#include "seaice/model.hpp"
#include "seaice/patch_sampler.hpp"
#include "seaice/pipeline.hpp"
#include "seaice/raster.hpp"
#include "seaice/schedule.hpp"
#include "seaice/synth.hpp"
#include "seaice/trainer.hpp"
