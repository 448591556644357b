#pragma once

#include "lpoison/harness/config.hpp"
#include "lpoison/harness/experiments.hpp"
#include "lpoison/harness/plot.hpp"
#include "lpoison/harness/report.hpp"
