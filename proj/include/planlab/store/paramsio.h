#pragma once

#include <stdexcept>
#include <string>

#include "planlab/model/scorer.h"

namespace planlab::store {

class ParamsFormatError : public std::runtime_error {
  public:
    explicit ParamsFormatError(const std::string& why)
        : std::runtime_error("parameter file error: " + why) {}
};

// Binary container: magic, length-prefixed JSON metadata (version, shape,
// vocabulary), then the two weight arrays verbatim. Loading a saved file
// reproduces the parameters bit for bit.
auto save_params(const model::ModelParams& params, const std::string& path) -> void;
auto load_params(const std::string& path) -> model::ModelParams;

}  // namespace planlab::store
