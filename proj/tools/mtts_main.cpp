#include "mtts/mtts.hpp"
int main(){ return 0; }
