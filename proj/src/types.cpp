#include "svdprune/types.hpp"

#include <cmath>
#include <string>

#include "svdprune/errors.hpp"

namespace svdprune {

void FeatureMatrix::validate() const {
    if (rows < 1 || cols < 1) {
        throw ShapeError("feature matrix needs at least one row and one column, got (" +
                         std::to_string(rows) + ", " + std::to_string(cols) + ")");
    }
    if (data.size() != rows * cols) {
        throw ShapeError("feature matrix data length " + std::to_string(data.size()) +
                         " does not match shape (" + std::to_string(rows) + ", " +
                         std::to_string(cols) + ")");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i])) {
            throw DataError("non-finite value at (" + std::to_string(i / cols) + ", " +
                            std::to_string(i % cols) + ")");
        }
    }
}

} // namespace svdprune
