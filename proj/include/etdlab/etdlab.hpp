#pragma once

#include "etdlab/audit.hpp"
#include "etdlab/common.hpp"
#include "etdlab/emphasis.hpp"
#include "etdlab/fixtures.hpp"
#include "etdlab/instance.hpp"
#include "etdlab/learner.hpp"
#include "etdlab/mdp.hpp"
#include "etdlab/operators.hpp"
#include "etdlab/spec_io.hpp"
