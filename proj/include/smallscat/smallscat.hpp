#pragma once

#include "smallscat/types.hpp"
#include "smallscat/field.hpp"
#include "smallscat/incident.hpp"
#include "smallscat/quadrature.hpp"
#include "smallscat/linsolve.hpp"
#include "smallscat/mesh.hpp"
#include "smallscat/onebody.hpp"
#include "smallscat/core.hpp"
#include "smallscat/manybody.hpp"
#include "smallscat/background.hpp"
#include "smallscat/homogenize.hpp"
