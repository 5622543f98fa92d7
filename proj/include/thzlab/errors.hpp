#pragma once

#include <stdexcept>
#include <string>

namespace thzlab {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct FrequencyOutOfDomain : Error {
    explicit FrequencyOutOfDomain(const std::string& msg) : Error(msg) {}
};

struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& msg) : Error(msg) {}
};

struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& msg) : Error(msg) {}
};

struct FitDiverged : Error {
    explicit FitDiverged(const std::string& msg) : Error(msg) {}
};

struct InsufficientData : Error {
    explicit InsufficientData(const std::string& msg) : Error(msg) {}
};

struct NonFiniteIntegrand : Error {
    explicit NonFiniteIntegrand(const std::string& msg) : Error(msg) {}
};

struct NonFiniteLoss : Error {
    explicit NonFiniteLoss(const std::string& msg) : Error(msg) {}
};

struct Infeasible : Error {
    explicit Infeasible(const std::string& msg) : Error(msg) {}
};

struct MaxIterations : Error {
    explicit MaxIterations(const std::string& msg) : Error(msg) {}
};

struct TooLarge : Error {
    explicit TooLarge(const std::string& msg) : Error(msg) {}
};

}  // namespace thzlab
