#include "arena/types.hpp"

namespace arena {

const char* to_string(TargetMetric target) {
    switch (target) {
        case TargetMetric::Awr:
            return "awr";
        case TargetMetric::Clicks:
            return "clicks";
        case TargetMetric::Cnv:
            return "cnv";
        case TargetMetric::Rmse:
            return "rmse";
    }
    return "clicks";
}

TargetMetric target_metric_from_string(const std::string& name) {
    if (name == "awr") return TargetMetric::Awr;
    if (name == "clicks") return TargetMetric::Clicks;
    if (name == "cnv") return TargetMetric::Cnv;
    if (name == "rmse") return TargetMetric::Rmse;
    throw ConfigError("unknown target metric '" + name + "' (expected awr, clicks, cnv or rmse)");
}

}  // namespace arena
