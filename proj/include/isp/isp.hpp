#pragma once

#include "isp/corpus.hpp"
#include "isp/dsl.hpp"
#include "isp/generate.hpp"
#include "isp/parallel.hpp"
#include "isp/probability.hpp"
#include "isp/report.hpp"
#include "isp/spacecount.hpp"
#include "isp/subsets.hpp"
#include "isp/synth.hpp"
#include "isp/xval.hpp"
