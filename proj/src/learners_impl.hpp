#pragma once

#include "gemith/learners.hpp"

namespace gemith::detail {

std::unique_ptr<Model> fit_ridge(const HyperConfig& config, const Matrix& X, const Vector& y);
std::unique_ptr<Model> fit_elastic_net(const HyperConfig& config, const Matrix& X,
                                       const Vector& y);
std::unique_ptr<Model> fit_knn(const HyperConfig& config, const Matrix& X, const Vector& y);
std::unique_ptr<Model> fit_tree(const HyperConfig& config, const Matrix& X, const Vector& y);
std::unique_ptr<Model> fit_random_forest(const HyperConfig& config, const Matrix& X,
                                         const Vector& y, std::uint64_t seed);
std::unique_ptr<Model> fit_gradient_boosting(const HyperConfig& config, const Matrix& X,
                                             const Vector& y);

}  // namespace gemith::detail
