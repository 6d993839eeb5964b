#pragma once

#include <string>

#include "guidelab/common.hpp"

namespace testing {

// Name of the error code thrown by f, "none" when it returns normally.
template <class F>
std::string thrown_code(F&& f) {
    try {
        f();
    } catch (const guidelab::Error& e) {
        return guidelab::to_string(e.code());
    }
    return "none";
}

inline std::string name(guidelab::ErrorCode c) { return guidelab::to_string(c); }

}  // namespace testing
