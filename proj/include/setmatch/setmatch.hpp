#pragma once

#include "setmatch/archive.hpp"
#include "setmatch/archive_views.hpp"
#include "setmatch/cache_adapter.hpp"
#include "setmatch/crop_plan.hpp"
#include "setmatch/diagnostics.hpp"
#include "setmatch/embedding.hpp"
#include "setmatch/error.hpp"
#include "setmatch/ot.hpp"
#include "setmatch/zero_shot.hpp"
