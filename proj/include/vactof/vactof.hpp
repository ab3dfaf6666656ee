#pragma once

#include "vactof/arrival.hpp"
#include "vactof/channel.hpp"
#include "vactof/constants.hpp"
#include "vactof/csv.hpp"
#include "vactof/errors.hpp"
#include "vactof/experiments.hpp"
#include "vactof/kinematics.hpp"
#include "vactof/link.hpp"
#include "vactof/quadrature.hpp"
#include "vactof/rng.hpp"
#include "vactof/runconfig.hpp"
#include "vactof/source.hpp"
#include "vactof/species.hpp"
#include "vactof/wien.hpp"
