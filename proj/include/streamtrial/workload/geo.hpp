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

#ifndef STREAMTRIAL_WORKLOAD_GEO_HPP_
#define STREAMTRIAL_WORKLOAD_GEO_HPP_

namespace streamtrial::workload {

struct GeoPoint {
    double latitude = 0.0;
    double longitude = 0.0;
    bool operator==(const GeoPoint&) const = default;
};

/// Central Berlin.
inline constexpr GeoPoint kBerlinCenter{52.520008, 13.404954};

inline constexpr double kEarthRadiusM = 6'371'008.8;

/// Great-circle distance in meters (haversine).
double distance_m(const GeoPoint& a, const GeoPoint& b);

/// Local tangent-plane offset: meters east/north of `origin` to geographic coordinates.
GeoPoint offset_to_geo(const GeoPoint& origin, double east_m, double north_m);

}// namespace streamtrial::workload

#endif// STREAMTRIAL_WORKLOAD_GEO_HPP_
