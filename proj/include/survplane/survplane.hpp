#pragma once

#include "survplane/calibration.hpp"
#include "survplane/checkpoint.hpp"
#include "survplane/cohort_io.hpp"
#include "survplane/config.hpp"
#include "survplane/domain.hpp"
#include "survplane/encoder.hpp"
#include "survplane/evaluate.hpp"
#include "survplane/gradients.hpp"
#include "survplane/head.hpp"
#include "survplane/losses.hpp"
#include "survplane/metrics.hpp"
#include "survplane/model.hpp"
#include "survplane/rng.hpp"
#include "survplane/synth.hpp"
#include "survplane/trainer.hpp"
