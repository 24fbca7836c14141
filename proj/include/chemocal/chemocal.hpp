#pragma once

#include "chemocal/error.hpp"
#include "chemocal/rng.hpp"
#include "chemocal/stats.hpp"
#include "chemocal/parallel.hpp"
#include "chemocal/csv.hpp"
#include "chemocal/json_io.hpp"
#include "chemocal/dataset.hpp"
#include "chemocal/cube.hpp"
#include "chemocal/specprep.hpp"
#include "chemocal/pls.hpp"
#include "chemocal/correct.hpp"
#include "chemocal/calib.hpp"
#include "chemocal/diagnose.hpp"
#include "chemocal/density.hpp"
#include "chemocal/synth.hpp"
#include "chemocal/svg.hpp"
