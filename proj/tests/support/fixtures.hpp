#pragma once

#include "hollow/admm_trainer.hpp"
#include "hollow/config.hpp"
#include "hollow/synthetic.hpp"

namespace hollow::testing {

/// Few low-resolution views of a hollow sphere, cheap enough for unit tests.
Dataset tiny_dataset(const std::string& split = "train", int views = 4, int size = 16);

/// Desk preset shrunk for unit tests: small table and batches, a handful of steps.
Config tiny_config(std::int64_t steps = 5);

} // namespace hollow::testing
