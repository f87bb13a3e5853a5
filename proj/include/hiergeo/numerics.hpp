#pragma once

#include "hiergeo/adam.hpp"
#include "hiergeo/attention.hpp"
#include "hiergeo/error.hpp"
#include "hiergeo/ffn.hpp"
#include "hiergeo/gradcheck.hpp"
#include "hiergeo/random.hpp"
#include "hiergeo/softmax.hpp"
#include "hiergeo/tensor.hpp"
