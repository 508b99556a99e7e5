#pragma once

#include "hillriesz/common.hpp"
#include "hillriesz/trend.hpp"
#include "hillriesz/potential.hpp"
#include "hillriesz/galerkin.hpp"
#include "hillriesz/floquet.hpp"
#include "hillriesz/asymptotics.hpp"
#include "hillriesz/riesz.hpp"
