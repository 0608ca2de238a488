#pragma once

#include "pf/attention.hpp"
#include "pf/classify.hpp"
#include "pf/error.hpp"
#include "pf/fft.hpp"
#include "pf/heads.hpp"
#include "pf/policy.hpp"
#include "pf/rope.hpp"
#include "pf/sim.hpp"
#include "pf/trace.hpp"
