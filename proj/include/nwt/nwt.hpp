#pragma once

#include "errors.hpp"
#include "grid.hpp"
#include "state.hpp"
#include "phase_space.hpp"
#include "apparatus.hpp"
#include "direct.hpp"
#include "radon.hpp"
#include "ml.hpp"
#include "io.hpp"
#include "pipeline.hpp"
