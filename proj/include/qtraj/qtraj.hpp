#pragma once

#include "qtraj/basis.hpp"
#include "qtraj/bohm.hpp"
#include "qtraj/boundstate.hpp"
#include "qtraj/errors.hpp"
#include "qtraj/microstate.hpp"
#include "qtraj/parallel.hpp"
#include "qtraj/potential.hpp"
#include "qtraj/qshje.hpp"
#include "qtraj/scenario.hpp"
#include "qtraj/trajectory.hpp"
#include "qtraj/tunneling.hpp"
