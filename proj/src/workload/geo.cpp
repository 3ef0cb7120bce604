/*
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#include <streamtrial/workload/geo.hpp>

#include <cmath>
#include <numbers>

namespace streamtrial::workload {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

double distance_m(const GeoPoint& a, const GeoPoint& b) {
    const double lat1 = a.latitude * kDegToRad;
    const double lat2 = b.latitude * kDegToRad;
    const double dlat = lat2 - lat1;
    const double dlon = (b.longitude - a.longitude) * kDegToRad;
    const double h = std::sin(dlat / 2) * std::sin(dlat / 2)
        + std::cos(lat1) * std::cos(lat2) * std::sin(dlon / 2) * std::sin(dlon / 2);
    return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

GeoPoint offset_to_geo(const GeoPoint& origin, double east_m, double north_m) {
    const double lat = origin.latitude + (north_m / kEarthRadiusM) / kDegToRad;
    const double lon = origin.longitude + (east_m / (kEarthRadiusM * std::cos(origin.latitude * kDegToRad))) / kDegToRad;
    return {lat, lon};
}

}// namespace streamtrial::workload
