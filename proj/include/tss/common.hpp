#pragma once
// Shared value types and error kinds for the temporal segmentation library.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tss {

// Probabilities are clamped to this floor before any logarithm.
inline constexpr double kProbFloor = 1e-8;

inline double clamped_log(double p) {
    return std::log(p < kProbFloor ? kProbFloor : p);
}

// Library errors carry a stable machine-readable kind so callers (and the
// CLI's stderr output) can dispatch without parsing the message text.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

#define TSS_ERROR_KIND(Name)                                          \
    class Name : public Error {                                       \
    public:                                                           \
        explicit Name(const std::string& msg) : Error(#Name, msg) {}  \
    }

TSS_ERROR_KIND(EmptySequence);
TSS_ERROR_KIND(LabelOutOfRange);
TSS_ERROR_KIND(DimensionMismatch);
TSS_ERROR_KIND(SequenceTooShort);
TSS_ERROR_KIND(NoAnchorAvailable);
TSS_ERROR_KIND(MissingLossTerm);
TSS_ERROR_KIND(InvalidStride);
TSS_ERROR_KIND(InfeasibleAlignment);
TSS_ERROR_KIND(InvalidVicinity);
TSS_ERROR_KIND(InsufficientData);
TSS_ERROR_KIND(GrammarError);
TSS_ERROR_KIND(CoverageInfeasible);
TSS_ERROR_KIND(UnknownAction);
TSS_ERROR_KIND(CorruptFeatureFile);
TSS_ERROR_KIND(DivergenceDetected);
TSS_ERROR_KIND(StaleCache);
TSS_ERROR_KIND(IoError);
TSS_ERROR_KIND(SchemaError);

#undef TSS_ERROR_KIND

// Dense row-major matrix of doubles. Frames are rows throughout the library:
// a T x K probability matrix has one row per frame, one column per class.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), fill) {}

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    double* row(int r) { return data.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* where) {
    if (!a.same_shape(b))
        throw DimensionMismatch(std::string(where) + ": " + std::to_string(a.rows) + "x" +
                                std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                                std::to_string(b.cols));
}

}  // namespace tss
