#include "advaudio/advaudio.hpp"
int main() { return 0; }
