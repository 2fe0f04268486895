#pragma once

#include "qgh/errors.hpp"
#include "qgh/numerics.hpp"
#include "qgh/parallel.hpp"
#include "qgh/solver.hpp"
#include "qgh/space.hpp"
#include "qgh/group_action.hpp"
#include "qgh/cqms.hpp"
#include "qgh/finmetric.hpp"
#include "qgh/examples.hpp"
#include "qgh/distoq.hpp"
#include "qgh/fields.hpp"
#include "qgh/report.hpp"
#include "qgh/scenario.hpp"
