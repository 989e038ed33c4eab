#pragma once

#include "dmm/bench.hpp"
#include "dmm/cluster_detector.hpp"
#include "dmm/error.hpp"
#include "dmm/eval.hpp"
#include "dmm/export.hpp"
#include "dmm/glasso.hpp"
#include "dmm/mdl.hpp"
#include "dmm/model.hpp"
#include "dmm/random.hpp"
#include "dmm/segmentation.hpp"
#include "dmm/segmenter.hpp"
#include "dmm/serialize.hpp"
#include "dmm/synth.hpp"
#include "dmm/tensor.hpp"
#include "dmm/tts_io.hpp"
