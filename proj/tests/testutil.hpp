#ifndef FMSEG_TESTUTIL_HPP
#define FMSEG_TESTUTIL_HPP

#include <filesystem>
#include <string>

#include "fmseg/rng.hpp"
#include "fmseg/tensor.hpp"

namespace fmseg::test {

inline Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, real lo = 0.0,
                            real hi = 1.0) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

inline Tensor random_mask(Rng& rng, std::size_t h, std::size_t w, real p_one = 0.5) {
    Tensor t({h, w});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(0.0, 1.0) < p_one ? 1.0 : 0.0;
    return t;
}

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("fmseg_test_" + tag + "_" + std::to_string(counter()++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string str() const { return path_.string(); }
    std::filesystem::path path() const { return path_; }

private:
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::filesystem::path path_;
};

}  // namespace fmseg::test

#endif
