#pragma once

namespace diffcd::detail {

// Corner i of a cell sets bit i of the case index when its value is negative.
// Edges: 0:(0,1) 1:(1,2) 2:(2,3) 3:(3,0) 4:(4,5) 5:(5,6) 6:(6,7) 7:(7,4)
//        8:(0,4) 9:(1,5) 10:(2,6) 11:(3,7); -1 terminates a row.
extern const int kTriTable[256][16];

}  // namespace diffcd::detail
