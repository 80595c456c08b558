#pragma once

#include "alphainv/activations.hpp"
#include "alphainv/error.hpp"
#include "alphainv/fields.hpp"
#include "alphainv/image.hpp"
#include "alphainv/parallel.hpp"
#include "alphainv/random.hpp"
#include "alphainv/render.hpp"
#include "alphainv/sampling.hpp"
#include "alphainv/scene.hpp"
#include "alphainv/scene_io.hpp"
#include "alphainv/stats.hpp"
#include "alphainv/train.hpp"
#include "alphainv/transmittance_init.hpp"
#include "alphainv/volrend.hpp"
