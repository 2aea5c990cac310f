#pragma once

// Core library. The HTTP pieces (external.hpp, service.hpp) pull in
// cpp-httplib and are included separately.

#include "higs/alignment.hpp"
#include "higs/composition.hpp"
#include "higs/error.hpp"
#include "higs/geometry.hpp"
#include "higs/graph.hpp"
#include "higs/layout.hpp"
#include "higs/node.hpp"
#include "higs/pipeline.hpp"
#include "higs/procedural.hpp"
#include "higs/serialize.hpp"
#include "higs/session_io.hpp"
#include "higs/vec.hpp"
