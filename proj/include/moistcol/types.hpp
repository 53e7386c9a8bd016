#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace moistcol {

using Vector = Eigen::VectorXd;

/// Error raised for malformed or out-of-range user input (exit status 1).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Root-finding failure while inverting theta + Q^sat (signals an invalid model).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A violated internal precondition of the rearrangement cascade.
class LogicError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Bijection on {0, ..., n-1}. Stored as the image array: `(*this)[i]` is the image of i.
class Permutation {
public:
    Permutation() = default;
    explicit Permutation(std::vector<int> image) : image_(std::move(image)) {}

    static Permutation identity(int n);

    int size() const { return static_cast<int>(image_.size()); }
    int operator[](int i) const { return image_[static_cast<std::size_t>(i)]; }
    int& operator[](int i) { return image_[static_cast<std::size_t>(i)]; }

    const std::vector<int>& image() const { return image_; }

    bool is_bijection() const;
    bool is_identity() const;
    Permutation inverse() const;

    /// (a * b)(i) = a(b(i)), i.e. apply b first.
    friend Permutation operator*(const Permutation& a, const Permutation& b);
    friend bool operator==(const Permutation&, const Permutation&) = default;

private:
    std::vector<int> image_;
};

/// Grid location z of a 0-based position index p in a column of n parcels: z = (p+1)/n.
inline double grid_z(int p, int n) { return static_cast<double>(p + 1) / static_cast<double>(n); }

}  // namespace moistcol
