#pragma once

#include "rqhj/errors.hpp"
#include "rqhj/physics.hpp"
#include "rqhj/dopri5.hpp"
#include "rqhj/dirac_solver.hpp"
#include "rqhj/reduced_action.hpp"
#include "rqhj/residual.hpp"
#include "rqhj/hj_verifier.hpp"
