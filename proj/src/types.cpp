#include "moistcol/types.hpp"

#include <numeric>

namespace moistcol {

Permutation Permutation::identity(int n) {
    std::vector<int> image(static_cast<std::size_t>(n));
    std::iota(image.begin(), image.end(), 0);
    return Permutation(std::move(image));
}

bool Permutation::is_bijection() const {
    std::vector<char> seen(image_.size(), 0);
    for (int v : image_) {
        if (v < 0 || v >= size() || seen[static_cast<std::size_t>(v)]) return false;
        seen[static_cast<std::size_t>(v)] = 1;
    }
    return true;
}

bool Permutation::is_identity() const {
    for (int i = 0; i < size(); ++i)
        if (image_[static_cast<std::size_t>(i)] != i) return false;
    return true;
}

Permutation Permutation::inverse() const {
    std::vector<int> inv(image_.size());
    for (int i = 0; i < size(); ++i) inv[static_cast<std::size_t>(image_[static_cast<std::size_t>(i)])] = i;
    return Permutation(std::move(inv));
}

Permutation operator*(const Permutation& a, const Permutation& b) {
    if (a.size() != b.size()) throw LogicError("permutation size mismatch in composition");
    std::vector<int> out(static_cast<std::size_t>(b.size()));
    for (int i = 0; i < b.size(); ++i) out[static_cast<std::size_t>(i)] = a[b[i]];
    return Permutation(std::move(out));
}

}  // namespace moistcol
