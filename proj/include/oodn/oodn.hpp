#pragma once

// Umbrella header.

#include <oodn/error.hpp>
#include <oodn/exploiters.hpp>
#include <oodn/expr.hpp>
#include <oodn/io.hpp>
#include <oodn/model.hpp>
#include <oodn/modifiers.hpp>
#include <oodn/network.hpp>
#include <oodn/quantity.hpp>
