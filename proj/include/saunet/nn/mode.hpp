#pragma once

namespace saunet::nn {

enum class Mode { train, eval };

}  // namespace saunet::nn
