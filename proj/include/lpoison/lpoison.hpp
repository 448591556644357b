#pragma once

#include "lpoison/attack.hpp"
#include "lpoison/dataset.hpp"
#include "lpoison/defense.hpp"
#include "lpoison/error.hpp"
#include "lpoison/graph_kernel.hpp"
#include "lpoison/inductive.hpp"
#include "lpoison/influence.hpp"
#include "lpoison/rng.hpp"
#include "lpoison/ssl.hpp"
#include "lpoison/stats.hpp"
