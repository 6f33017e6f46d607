#pragma once

#include <limits>

namespace kern {

// Standard early-stopping rule: stop once `patience` epochs pass without a
// strict improvement of the tracked metric. Epochs are 1-indexed.
struct EarlyStopper {
    int patience = 100;
    bool maximize = false;

    int epoch = 0;
    int best_epoch = 0;
    double best = std::numeric_limits<double>::quiet_NaN();

    // Returns true when this epoch strictly improved on the best so far.
    bool observe(double value) {
        ++epoch;
        const bool better = best_epoch == 0 || (maximize ? value > best : value < best);
        if (better) {
            best = value;
            best_epoch = epoch;
        }
        return better;
    }

    bool should_stop() const { return best_epoch > 0 && epoch - best_epoch >= patience; }
};

}  // namespace kern
