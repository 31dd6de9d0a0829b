#pragma once

// Everything except the network client (wue/fetch.hpp), which pulls in
// cpp-httplib and OpenSSL.

#include "wue/analytics.hpp"
#include "wue/apps_opt.hpp"
#include "wue/cache.hpp"
#include "wue/dataset.hpp"
#include "wue/error.hpp"
#include "wue/grid_mix.hpp"
#include "wue/ingest.hpp"
#include "wue/time.hpp"
#include "wue/wue_core.hpp"
